//! Round-trip identity over random canonical linear peptides, with
//! independent formula arithmetic as the oracle.

use moldiff_core::peplink::{
    peptide_to_graph, peptide_to_selfies, selfies_to_peptide, PeptideSpec, ResidueRegistry,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CANONICAL: [&str; 20] = [
    "g", "a", "r", "n", "d", "c", "q", "e", "h", "i", "l", "k", "m", "f", "P", "s", "t",
    "w", "y", "v",
];

/// Literature molecular formulas of the free amino acids, as (C, H, N, O, S)
/// counts. Independent of the registry SMILES parsing path.
fn residue_formula(code: &str) -> (u32, u32, u32, u32, u32) {
    match code {
        "g" => (2, 5, 1, 2, 0),
        "a" => (3, 7, 1, 2, 0),
        "r" => (6, 14, 4, 2, 0),
        "n" => (4, 8, 2, 3, 0),
        "d" => (4, 7, 1, 4, 0),
        "c" => (3, 7, 1, 2, 1),
        "q" => (5, 10, 2, 3, 0),
        "e" => (5, 9, 1, 4, 0),
        "h" => (6, 9, 3, 2, 0),
        "i" => (6, 13, 1, 2, 0),
        "l" => (6, 13, 1, 2, 0),
        "k" => (6, 14, 2, 2, 0),
        "m" => (5, 11, 1, 2, 1),
        "f" => (9, 11, 1, 2, 0),
        "P" => (5, 9, 1, 2, 0),
        "s" => (3, 7, 1, 3, 0),
        "t" => (4, 9, 1, 3, 0),
        "w" => (11, 12, 2, 2, 0),
        "y" => (9, 11, 1, 3, 0),
        "v" => (5, 11, 1, 2, 0),
        _ => panic!("not canonical"),
    }
}

fn formula_string(c: u32, h: u32, n: u32, o: u32, s: u32) -> String {
    let mut out = String::new();
    for (sym, count) in [("C", c), ("H", h), ("N", n), ("O", o), ("S", s)] {
        match count {
            0 => {}
            1 => out.push_str(sym),
            k => out.push_str(&format!("{sym}{k}")),
        }
    }
    out
}

/// Condensation arithmetic: the peptide formula is the residue sum minus
/// (L - 1) waters.
fn peptide_formula(codes: &[&str]) -> String {
    let mut total = (0u32, 0u32, 0u32, 0u32, 0u32);
    for code in codes {
        let f = residue_formula(code);
        total = (
            total.0 + f.0,
            total.1 + f.1,
            total.2 + f.2,
            total.3 + f.3,
            total.4 + f.4,
        );
    }
    let waters = (codes.len() - 1) as u32;
    formula_string(total.0, total.1 - 2 * waters, total.2, total.3 - waters, total.4)
}

#[test]
fn thousand_random_linear_peptides_roundtrip() {
    let registry = ResidueRegistry::builtin();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..1000 {
        let len = rng.gen_range(1..=8);
        let codes: Vec<&str> = (0..len)
            .map(|_| *CANONICAL.choose(&mut rng).unwrap())
            .collect();
        let spec = PeptideSpec::linear(&codes);
        let assembly = peptide_to_graph(&spec, &registry)
            .unwrap_or_else(|e| panic!("case {case} {codes:?}: assemble failed: {e}"));
        // Mass balance against the independent condensation arithmetic.
        assert_eq!(
            assembly.graph.formula(),
            peptide_formula(&codes),
            "case {case} {codes:?}: formula drift"
        );
        assembly.graph.validate_valence().unwrap();
        let selfies = peptide_to_selfies(&spec, &registry)
            .unwrap_or_else(|e| panic!("case {case} {codes:?}: to selfies failed: {e}"));
        let back = selfies_to_peptide(&selfies, &registry)
            .unwrap_or_else(|e| panic!("case {case} {codes:?}: reverse failed: {e}"));
        assert_eq!(back.residues, spec.residues, "case {case}");
    }
}

#[test]
fn every_emitted_graph_is_valence_legal() {
    let registry = ResidueRegistry::builtin();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let len = rng.gen_range(1..=6);
        let codes: Vec<&str> = (0..len)
            .map(|_| *CANONICAL.choose(&mut rng).unwrap())
            .collect();
        let assembly = peptide_to_graph(&PeptideSpec::linear(&codes), &registry).unwrap();
        assembly.graph.validate_valence().unwrap();
        assert!(assembly.graph.is_connected());
    }
}

#[test]
fn dialanine_formula_against_condensation_arithmetic() {
    let registry = ResidueRegistry::builtin();
    let assembly =
        peptide_to_graph(&PeptideSpec::linear(&["a", "a"]), &registry).unwrap();
    // Two alanines C3H7NO2 minus one water.
    assert_eq!(assembly.graph.formula(), "C6H12N2O3");
    assert_eq!(peptide_formula(&["a", "a"]), "C6H12N2O3");
}
