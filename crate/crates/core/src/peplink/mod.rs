//! Peptide assembly: residue templates joined into a backbone by amide
//! condensation, intrachain bonds for cyclic or bridged structures, terminal
//! modifications, and the reverse decomposition of linear peptides back into
//! residue codes.

mod assemble;
mod isomorphism;
mod registry;
mod reverse;

pub use assemble::{
    apply_intrachain_bonds, apply_terminal_mods, assemble_backbone, peptide_to_graph,
    peptide_to_selfies, Assembly, ResidueSpan,
};
pub use isomorphism::graphs_match;
pub use registry::{QuarantineEntry, ResidueRegistry, ResidueTemplate};
pub use reverse::selfies_to_peptide;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PeplinkError {
    #[error("unknown residue {0:?}")]
    UnknownResidue(String),
    #[error("residue {code:?} lacks a usable {what}")]
    MissingAttachmentSite { code: String, what: &'static str },
    #[error("unsupported intrachain bond type {0:?}")]
    UnsupportedBondType(String),
    #[error("residue {index} has no reactive {what} site")]
    SiteNotReactive { index: usize, what: &'static str },
    #[error("terminus already consumed by cyclization")]
    TerminusConsumed,
    #[error("unknown terminal modification {0:?}")]
    UnknownModification(String),
    #[error("not a peptide: {0}")]
    NotAPeptide(String),
    #[error("ambiguous decomposition: {0}")]
    AmbiguousDecomposition(String),
    #[error("peptide needs at least one residue")]
    EmptySpec,
    #[error("bond site {0} out of range")]
    SiteOutOfRange(usize),
    #[error("duplicate intrachain bond on sites {0} and {1}")]
    DuplicateBond(usize, usize),
    #[error("registry file malformed: {0}")]
    MalformedRegistry(String),
    #[error(transparent)]
    Graph(#[from] crate::chem::GraphError),
    #[error(transparent)]
    Selfies(#[from] crate::selfies::SelfiesError),
}

/// Supported intrachain bond chemistries. Additional types follow the same
/// bookkeeping schema: locate a donor and an acceptor site, remove the
/// leaving atoms, and form the new bond.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BondKind {
    /// S-S bridge between two thiol sulfurs; one hydrogen leaves each side.
    Disulfide,
    /// Backbone amide between the C-terminal carboxyl and the N-terminal
    /// amine; water leaves.
    HeadToTailLactam,
    /// Amide between a side-chain carboxyl and a side-chain amine.
    SideChainLactam,
}

impl BondKind {
    pub fn parse(s: &str) -> Result<BondKind, PeplinkError> {
        match s.to_ascii_lowercase().as_str() {
            "disulfide" | "ss" => Ok(BondKind::Disulfide),
            "head-to-tail" | "head_to_tail" | "lactam" => Ok(BondKind::HeadToTailLactam),
            "side-chain-lactam" | "side_chain_lactam" | "sidechain" => {
                Ok(BondKind::SideChainLactam)
            }
            other => Err(PeplinkError::UnsupportedBondType(other.to_string())),
        }
    }
}

/// One intrachain bond between residue positions (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntrachainBond {
    pub kind: BondKind,
    pub site_a: usize,
    pub site_b: usize,
}

/// A peptide: residue codes from the registry listed N- to C-terminus,
/// intrachain bonds, and optional terminal modifications.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PeptideSpec {
    pub residues: Vec<String>,
    pub bonds: Vec<IntrachainBond>,
    pub n_term: Option<String>,
    pub c_term: Option<String>,
}

impl PeptideSpec {
    pub fn linear<S: AsRef<str>>(codes: &[S]) -> PeptideSpec {
        PeptideSpec {
            residues: codes.iter().map(|c| c.as_ref().to_string()).collect(),
            ..PeptideSpec::default()
        }
    }

    pub fn validate(&self, registry: &ResidueRegistry) -> Result<(), PeplinkError> {
        if self.residues.is_empty() {
            return Err(PeplinkError::EmptySpec);
        }
        for code in &self.residues {
            if registry.template(code).is_none() {
                return Err(PeplinkError::UnknownResidue(code.clone()));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for bond in &self.bonds {
            for site in [bond.site_a, bond.site_b] {
                if site >= self.residues.len() {
                    return Err(PeplinkError::SiteOutOfRange(site));
                }
            }
            let key = (
                bond.site_a.min(bond.site_b),
                bond.site_a.max(bond.site_b),
            );
            if !seen.insert(key) {
                return Err(PeplinkError::DuplicateBond(key.0, key.1));
            }
        }
        Ok(())
    }
}
