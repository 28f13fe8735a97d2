//! Molecular graphs and SMILES text for the supported chemistry subset.
//!
//! The subset covers the organic elements C, N, O, S, P, F, Cl, Br, I plus
//! explicit hydrogen, integer charges -1/0/+1, bond orders 1-3, branches and
//! rings. Tetrahedral chirality marks and cis/trans slashes are parsed and
//! recorded but carry no semantics here; they are dropped on output.

mod element;
mod graph;
mod smiles;

pub use element::Element;
pub use graph::{Atom, Bond, Chirality, FormulaError, GraphError, MolecularGraph, TraversalPlan};
pub use smiles::{parse_smiles, write_smiles, SmilesError};
